#pragma once

#include "nodeflow/benchmarks.hpp"
#include "nodeflow/displacement.hpp"
#include "nodeflow/error.hpp"
#include "nodeflow/fields.hpp"
#include "nodeflow/flow.hpp"
#include "nodeflow/harness.hpp"
#include "nodeflow/measures.hpp"
#include "nodeflow/synthesis.hpp"
#include "nodeflow/trajectory.hpp"
#include "nodeflow/transport.hpp"
