#pragma once

#include "sqzlab/adapters.hpp"
#include "sqzlab/cavity.hpp"
#include "sqzlab/constants.hpp"
#include "sqzlab/data_series.hpp"
#include "sqzlab/decibel.hpp"
#include "sqzlab/errors.hpp"
#include "sqzlab/fit.hpp"
#include "sqzlab/locksim.hpp"
#include "sqzlab/photorefraction.hpp"
#include "sqzlab/rng.hpp"
#include "sqzlab/sensing.hpp"
#include "sqzlab/squeezing.hpp"
#include "sqzlab/synth.hpp"
#include "sqzlab/version.hpp"
