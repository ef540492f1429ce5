#pragma once

// Umbrella header.
#include "trapwalk/errors.hpp"
#include "trapwalk/experiments.hpp"
#include "trapwalk/io.hpp"
#include "trapwalk/islands.hpp"
#include "trapwalk/lattice.hpp"
#include "trapwalk/parallel.hpp"
#include "trapwalk/percolation.hpp"
#include "trapwalk/rng.hpp"
#include "trapwalk/spectral.hpp"
#include "trapwalk/survival.hpp"
#include "trapwalk/walker.hpp"
