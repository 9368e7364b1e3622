#pragma once

#include "confidence.hpp"
#include "config.hpp"
#include "connectivity.hpp"
#include "error.hpp"
#include "gcn.hpp"
#include "graph.hpp"
#include "io.hpp"
#include "metrics.hpp"
#include "partition.hpp"
#include "pipeline.hpp"
#include "synthetic.hpp"
#include "tensor.hpp"
