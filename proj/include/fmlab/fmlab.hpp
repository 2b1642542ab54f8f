#pragma once

#include "fmlab/config.hpp"
#include "fmlab/constructions.hpp"
#include "fmlab/fit.hpp"
#include "fmlab/grid.hpp"
#include "fmlab/matrix_multiplier.hpp"
#include "fmlab/multiplier.hpp"
#include "fmlab/parallel.hpp"
#include "fmlab/shift_invariant.hpp"
#include "fmlab/sobolev.hpp"
#include "fmlab/zak.hpp"
#include "fmlab/zeroset.hpp"
