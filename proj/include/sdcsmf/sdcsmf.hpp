#pragma once

// Umbrella header for the SDC set-membership filter library.

#include "sdcsmf/bench.hpp"
#include "sdcsmf/ellipsoid.hpp"
#include "sdcsmf/errors.hpp"
#include "sdcsmf/filter.hpp"
#include "sdcsmf/models.hpp"
#include "sdcsmf/observability.hpp"
#include "sdcsmf/remainder_bound.hpp"
#include "sdcsmf/sdc_model.hpp"
#include "sdcsmf/sdp.hpp"
#include "sdcsmf/sdp_solver.hpp"
