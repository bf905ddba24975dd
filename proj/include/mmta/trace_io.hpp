#pragma once

#include <string>

#include "mmta/simulation.hpp"

namespace mmta::trace_io {

/// Writes the trace to out_dir with fixed, documented column orders:
///   trajectory_<NN>_<robot>.csv : t,x,y,vx,vy,theta,mode,energy,u1,u2
///   allocation.csv              : t,status,a_<task>_v<N>...,d_<task>_v<N>...
///   tasks.csv                   : t,h_<task>...
///   certificates.csv            : t,tau1,tau2,tau3,margin,feasible
///   summary.txt                 : completion times, energy totals, distances
/// Numbers are printed in shortest exact round-trip form. An empty trace
/// produces headers-only files. Throws IoError with the offending path.
void export_traces(const sim::Trace& trace, const std::string& out_dir);

/// Reads an exported directory back; inverse of export_traces for every
/// recorded field (mode names are re-derived from the allocation matrix).
sim::Trace import_traces(const std::string& dir);

} // namespace mmta::trace_io
