#pragma once

// Umbrella header.

#include "shapeci/error.hpp"
#include "shapeci/normal.hpp"
#include "shapeci/function_model.hpp"
#include "shapeci/rng.hpp"
#include "shapeci/interval.hpp"
#include "shapeci/white_noise.hpp"
#include "shapeci/monotone_wn.hpp"
#include "shapeci/convex_wn.hpp"
#include "shapeci/regression.hpp"
#include "shapeci/projection.hpp"
#include "shapeci/modulus.hpp"
#include "shapeci/harness.hpp"
#include "shapeci/suites.hpp"
