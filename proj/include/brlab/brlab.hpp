#pragma once

#include "brlab/errors.hpp"
#include "brlab/grid.hpp"
#include "brlab/special.hpp"
#include "brlab/quadrature.hpp"
#include "brlab/random.hpp"
#include "brlab/parallel.hpp"
#include "brlab/multipliers.hpp"
#include "brlab/engine.hpp"
#include "brlab/linear.hpp"
#include "brlab/multilinear.hpp"
#include "brlab/norms.hpp"
#include "brlab/verify.hpp"
