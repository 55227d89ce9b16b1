#ifndef KOOPMAN_KOOPMAN_HPP
#define KOOPMAN_KOOPMAN_HPP

#include "koopman/base.hpp"
#include "koopman/ergodicity.hpp"
#include "koopman/markov_operators.hpp"
#include "koopman/matrix.hpp"
#include "koopman/measure_space.hpp"
#include "koopman/rational.hpp"
#include "koopman/rng.hpp"
#include "koopman/semigroup_engine.hpp"
#include "koopman/spectral_flow.hpp"
#include "koopman/topological_model.hpp"

#endif
