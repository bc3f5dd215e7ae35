#ifndef VPPSCHED_MGBM_HPP
#define VPPSCHED_MGBM_HPP

// Stagnation detector for the local optimiser: a scalar Kalman filter over
// the per-generation improvement of a progress indicator. The run stops once
// the upper two-sigma bound of the smoothed improvement rate falls below a
// threshold.

#include <cmath>
#include <utility>

namespace vppsched {

struct MgbmConfig {
    double process_noise = 1e-8;
    double measurement_noise = 1e-6;
    double stop_threshold = 1e-3;
    int min_generations = 20;
    double initial_variance = 1.0;

    friend bool operator==(const MgbmConfig&, const MgbmConfig&) = default;
};

struct MgbmState {
    double estimate = 0.0;
    double variance = 1.0;
    double process_noise = 1e-8;
    double measurement_noise = 1e-6;
    double stop_threshold = 1e-3;
    int min_generations = 20;
    int samples = 0;

    static MgbmState from(const MgbmConfig& c)
    {
        return {0.0, c.initial_variance, c.process_noise, c.measurement_noise, c.stop_threshold, c.min_generations, 0};
    }
};

/// Fold one improvement sample into the filter and report whether to stop.
inline std::pair<MgbmState, bool> mgbm_should_stop(MgbmState state, double progress_sample)
{
    const double prior = state.variance + state.process_noise;
    const double gain = prior / (prior + state.measurement_noise);
    state.estimate += gain * (progress_sample - state.estimate);
    state.variance = (1.0 - gain) * prior;
    ++state.samples;
    const bool stop = state.samples >= state.min_generations
                      && state.estimate + 2.0 * std::sqrt(state.variance) < state.stop_threshold;
    return {state, stop};
}

} // namespace vppsched

#endif
