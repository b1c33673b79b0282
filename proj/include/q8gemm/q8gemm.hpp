#pragma once

#include "q8gemm/dispatch.hpp"
#include "q8gemm/engine.hpp"
#include "q8gemm/kernel.hpp"
#include "q8gemm/matrix.hpp"
#include "q8gemm/oracle.hpp"
#include "q8gemm/pack.hpp"
#include "q8gemm/pipeline.hpp"
#include "q8gemm/quant.hpp"
#include "q8gemm/sparse.hpp"
