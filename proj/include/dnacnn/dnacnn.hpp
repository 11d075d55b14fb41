#pragma once

#include "dnacnn/checkpoint.hpp"
#include "dnacnn/collective.hpp"
#include "dnacnn/error.hpp"
#include "dnacnn/genome_sim.hpp"
#include "dnacnn/kernels.hpp"
#include "dnacnn/metrics.hpp"
#include "dnacnn/model.hpp"
#include "dnacnn/pipeline.hpp"
#include "dnacnn/random.hpp"
#include "dnacnn/report.hpp"
#include "dnacnn/tensor.hpp"
#include "dnacnn/trainer.hpp"
#include "dnacnn/transport.hpp"
