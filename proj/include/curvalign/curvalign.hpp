#pragma once

#include "curvalign/error.hpp"
#include "curvalign/io.hpp"
#include "curvalign/report.hpp"
#include "curvalign/graph.hpp"
#include "curvalign/transport.hpp"
#include "curvalign/curvature.hpp"
#include "curvalign/ricci_flow.hpp"
#include "curvalign/graph_distances.hpp"
#include "curvalign/gmm.hpp"
#include "curvalign/rdm.hpp"
#include "curvalign/synth.hpp"
