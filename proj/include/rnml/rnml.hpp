#pragma once

#include "rnml/csv.hpp"
#include "rnml/errors.hpp"
#include "rnml/experiment_harness.hpp"
#include "rnml/exponential_family.hpp"
#include "rnml/gaussian_nml.hpp"
#include "rnml/gmm_complexity.hpp"
#include "rnml/gmm_selection.hpp"
#include "rnml/rng.hpp"
#include "rnml/special_functions.hpp"
#include "rnml/types.hpp"
#include "rnml/version.hpp"
