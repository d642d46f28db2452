#include "nlacf/parallel.hpp"

#include <atomic>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace nlacf {

namespace {
std::atomic<ExecMode> g_mode{ExecMode::OpenMP};
std::atomic<int> g_jobs{0};
}  // namespace

ExecMode exec_mode() { return g_mode.load(); }
void set_exec_mode(ExecMode mode) { g_mode.store(mode); }

int job_count() { return g_jobs.load(); }
void set_job_count(int jobs) { g_jobs.store(jobs < 0 ? 0 : jobs); }

void panel_sums_serial(std::size_t count, const PanelFn& fn, std::vector<double>& out) {
    out.resize(count);
    for (std::size_t i = 0; i < count; ++i) out[i] = fn(i);
}

void panel_sums_openmp(std::size_t count, const PanelFn& fn, std::vector<double>& out) {
#ifdef _OPENMP
    if (omp_in_parallel() || count < 8) {
        panel_sums_serial(count, fn, out);
        return;
    }
    out.resize(count);
    const int jobs = job_count();
    if (jobs > 0) {
#pragma omp parallel for schedule(dynamic, 2) num_threads(jobs)
        for (long long i = 0; i < static_cast<long long>(count); ++i)
            out[static_cast<std::size_t>(i)] = fn(static_cast<std::size_t>(i));
    } else {
#pragma omp parallel for schedule(dynamic, 2)
        for (long long i = 0; i < static_cast<long long>(count); ++i)
            out[static_cast<std::size_t>(i)] = fn(static_cast<std::size_t>(i));
    }
#else
    panel_sums_serial(count, fn, out);
#endif
}

void panel_sums(std::size_t count, const PanelFn& fn, std::vector<double>& out) {
    if (exec_mode() == ExecMode::OpenMP)
        panel_sums_openmp(count, fn, out);
    else
        panel_sums_serial(count, fn, out);
}

}  // namespace nlacf
