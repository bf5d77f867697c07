#pragma once

// Umbrella header for the whole library.

#include "mosaic/allocator.hpp"
#include "mosaic/baselines.hpp"
#include "mosaic/clustering.hpp"
#include "mosaic/io.hpp"
#include "mosaic/metrics.hpp"
#include "mosaic/pool.hpp"
#include "mosaic/ranking.hpp"
#include "mosaic/rng.hpp"
#include "mosaic/scaling.hpp"
#include "mosaic/simulator.hpp"
#include "mosaic/stopwords.hpp"
