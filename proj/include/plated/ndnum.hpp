#ifndef PLATED_NDNUM_HPP
#define PLATED_NDNUM_HPP

// Numerical core: tensors, layers, losses, optimizer, gradient checking.

#include "plated/ndnum/adam.hpp"
#include "plated/ndnum/checkpoint.hpp"
#include "plated/ndnum/gradcheck.hpp"
#include "plated/ndnum/init.hpp"
#include "plated/ndnum/loss.hpp"
#include "plated/ndnum/lstm.hpp"
#include "plated/ndnum/model.hpp"
#include "plated/ndnum/ops.hpp"
#include "plated/ndnum/params.hpp"
#include "plated/rng.hpp"
#include "plated/tensor.hpp"

#endif  // PLATED_NDNUM_HPP
