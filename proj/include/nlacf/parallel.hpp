#ifndef NLACF_PARALLEL_HPP
#define NLACF_PARALLEL_HPP

#include <cstddef>
#include <functional>
#include <vector>

namespace nlacf {

/// Panel-level execution backend for the quadrature engine. Both backends
/// fill the same per-panel partial sums; reduction is always serial and
/// left-to-right, so results are bit-identical regardless of backend.
enum class ExecMode { Serial, OpenMP };

ExecMode exec_mode();
void set_exec_mode(ExecMode mode);

/// Worker-pool size hint (OpenMP num_threads). 0 = runtime default.
int job_count();
void set_job_count(int jobs);

using PanelFn = std::function<double(std::size_t)>;

/// Serial reference kernel: out[i] = fn(i).
void panel_sums_serial(std::size_t count, const PanelFn& fn, std::vector<double>& out);

/// OpenMP kernel. Falls back to the serial path inside nested parallel
/// regions so inner quadratures never oversubscribe.
void panel_sums_openmp(std::size_t count, const PanelFn& fn, std::vector<double>& out);

/// Dispatch on the global exec mode.
void panel_sums(std::size_t count, const PanelFn& fn, std::vector<double>& out);

}  // namespace nlacf

#endif
