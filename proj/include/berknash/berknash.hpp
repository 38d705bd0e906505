#pragma once

#include "berknash/bellman.hpp"
#include "berknash/csv.hpp"
#include "berknash/discretize.hpp"
#include "berknash/divergence.hpp"
#include "berknash/equilibrium.hpp"
#include "berknash/errors.hpp"
#include "berknash/example_zoo.hpp"
#include "berknash/extended.hpp"
#include "berknash/grid.hpp"
#include "berknash/learning.hpp"
#include "berknash/model.hpp"
#include "berknash/modeldoc.hpp"
#include "berknash/rng.hpp"
#include "berknash/stationary.hpp"
#include "berknash/version.hpp"
