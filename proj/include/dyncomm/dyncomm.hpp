#pragma once

#include <dyncomm/core.hpp>
#include <dyncomm/io.hpp>
#include <dyncomm/temporal_graph.hpp>
#include <dyncomm/matrix_kernels.hpp>
#include <dyncomm/ode_engine.hpp>
#include <dyncomm/centrality.hpp>
#include <dyncomm/discrete_oracle.hpp>
#include <dyncomm/synth.hpp>
