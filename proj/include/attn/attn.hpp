#pragma once

#include "attn/attn_solver.hpp"
#include "attn/baseline.hpp"
#include "attn/cluster.hpp"
#include "attn/dataset.hpp"
#include "attn/error.hpp"
#include "attn/image.hpp"
#include "attn/metrics.hpp"
#include "attn/msc.hpp"
#include "attn/random.hpp"
#include "attn/report.hpp"
#include "attn/synthetic.hpp"
#include "attn/tensor.hpp"
#include "attn/tensor_io.hpp"
#include "attn/topology.hpp"
#include "attn/topology_io.hpp"
