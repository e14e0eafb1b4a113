#pragma once

#include "stochflow/birkhoff.hpp"
#include "stochflow/chain.hpp"
#include "stochflow/commands.hpp"
#include "stochflow/ergodicity.hpp"
#include "stochflow/errors.hpp"
#include "stochflow/flow.hpp"
#include "stochflow/index_set.hpp"
#include "stochflow/io.hpp"
#include "stochflow/matrix.hpp"
#include "stochflow/switching.hpp"
