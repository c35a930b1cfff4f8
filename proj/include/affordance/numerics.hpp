#pragma once

#include "affordance/numerics/adam.hpp"
#include "affordance/numerics/checkpoint.hpp"
#include "affordance/numerics/dense.hpp"
#include "affordance/numerics/losses.hpp"
#include "affordance/numerics/params.hpp"
