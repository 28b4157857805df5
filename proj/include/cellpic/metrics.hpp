#pragma once

#include <chrono>
#include <map>
#include <string>

namespace cellpic {

/// Accumulated wall-clock seconds per named phase.
class PhaseTimers {
public:
    void add(const std::string& phase, double seconds) { seconds_[phase] += seconds; }
    double get(const std::string& phase) const {
        auto it = seconds_.find(phase);
        return it == seconds_.end() ? 0.0 : it->second;
    }
    const std::map<std::string, double>& all() const { return seconds_; }

private:
    std::map<std::string, double> seconds_;
};

/// Monotonic stopwatch.
class Stopwatch {
public:
    using clock = std::chrono::steady_clock;

    Stopwatch() : start_(clock::now()) {}
    double seconds() const { return std::chrono::duration<double>(clock::now() - start_).count(); }
    void restart() { start_ = clock::now(); }

private:
    clock::time_point start_;
};

/// Adds the scope's elapsed time to a phase when destroyed. A null
/// timer set makes it a no-op.
class ScopedPhase {
public:
    ScopedPhase(PhaseTimers* timers, std::string phase) : timers_(timers), phase_(std::move(phase)) {}
    ~ScopedPhase() {
        if (timers_ != nullptr) {
            timers_->add(phase_, watch_.seconds());
        }
    }
    ScopedPhase(const ScopedPhase&) = delete;
    ScopedPhase& operator=(const ScopedPhase&) = delete;

private:
    PhaseTimers* timers_;
    std::string phase_;
    Stopwatch watch_;
};

} // namespace cellpic
