#pragma once

#include "vatensor/error.hpp"
#include "vatensor/io.hpp"
#include "vatensor/likelihood.hpp"
#include "vatensor/log.hpp"
#include "vatensor/metrics.hpp"
#include "vatensor/numeric.hpp"
#include "vatensor/rng.hpp"
#include "vatensor/sampler.hpp"
#include "vatensor/summaries.hpp"
#include "vatensor/synth.hpp"
#include "vatensor/types.hpp"
#include "vatensor/version.hpp"
