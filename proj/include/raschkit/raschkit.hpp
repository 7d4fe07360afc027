#pragma once

// Umbrella header.

#include "raschkit/analysis.hpp"
#include "raschkit/crowd.hpp"
#include "raschkit/error.hpp"
#include "raschkit/filter.hpp"
#include "raschkit/io.hpp"
#include "raschkit/mml.hpp"
#include "raschkit/parallel.hpp"
#include "raschkit/pipeline.hpp"
#include "raschkit/quadrature.hpp"
#include "raschkit/rasch.hpp"
#include "raschkit/response_matrix.hpp"
#include "raschkit/rng.hpp"
#include "raschkit/version.hpp"
#include "raschkit/vi.hpp"
