#ifndef AOC_AOC_HPP
#define AOC_AOC_HPP

#include "aoc/closed_form.hpp"
#include "aoc/config.hpp"
#include "aoc/csv.hpp"
#include "aoc/distribution.hpp"
#include "aoc/errors.hpp"
#include "aoc/gg_analytic.hpp"
#include "aoc/grid.hpp"
#include "aoc/harness.hpp"
#include "aoc/parallel.hpp"
#include "aoc/pareto.hpp"
#include "aoc/rng.hpp"
#include "aoc/slotted.hpp"
#include "aoc/stats.hpp"
#include "aoc/svg.hpp"
#include "aoc/tandem.hpp"

#endif  // AOC_AOC_HPP
