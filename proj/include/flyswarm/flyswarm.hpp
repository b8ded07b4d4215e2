#pragma once

#include "flyswarm/app.hpp"
#include "flyswarm/config.hpp"
#include "flyswarm/error.hpp"
#include "flyswarm/evolution.hpp"
#include "flyswarm/fly.hpp"
#include "flyswarm/geometry.hpp"
#include "flyswarm/image.hpp"
#include "flyswarm/pnm.hpp"
#include "flyswarm/synth.hpp"
#include "flyswarm/warning.hpp"
