#pragma once

#include "whoeffding/concentration.hpp"
#include "whoeffding/errors.hpp"
#include "whoeffding/functional.hpp"
#include "whoeffding/harness.hpp"
#include "whoeffding/markov.hpp"
#include "whoeffding/measures.hpp"
#include "whoeffding/models.hpp"
#include "whoeffding/numerics.hpp"
#include "whoeffding/rng.hpp"
#include "whoeffding/space.hpp"
#include "whoeffding/subordinator.hpp"
#include "whoeffding/wasserstein.hpp"
