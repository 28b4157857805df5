#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <exception>
#include <filesystem>
#include <functional>
#include <initializer_list>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <unordered_map>
#include <vector>

namespace cellpic {

/// Opaque identifier of a whole named array that tasks depend on.
struct RegionId {
    std::uint64_t value = 0;

    static RegionId named(std::string_view name);
    bool operator==(const RegionId&) const = default;
};

enum class AccessMode { read, write, readwrite };

struct DataRegion {
    RegionId id;
    AccessMode mode = AccessMode::read;

    static DataRegion in(RegionId id) { return {id, AccessMode::read}; }
    static DataRegion out(RegionId id) { return {id, AccessMode::write}; }
    static DataRegion inout(RegionId id) { return {id, AccessMode::readwrite}; }
};

/// One unit of asynchronous work. `queue` plays the role of an async(n)
/// stream id: an ordering scope that wait() can target.
struct TaskSpec {
    std::function<void()> work;
    std::vector<DataRegion> regions;
    int queue = 0;
    std::string tag;
};

struct TraceEvent {
    std::uint64_t task_id = 0;
    std::string tag;
    int queue = 0;
    int worker = 0;
    std::int64_t start_ns = 0;
    std::int64_t end_ns = 0;
};

namespace detail {
struct TaskNode;
}

/// Handle to a submitted task.
class TaskHandle {
public:
    TaskHandle() = default;
    explicit TaskHandle(std::shared_ptr<detail::TaskNode> node) : node_(std::move(node)) {}

    bool valid() const { return node_ != nullptr; }
    bool done() const;
    std::uint64_t id() const;

private:
    friend class Scheduler;
    std::shared_ptr<detail::TaskNode> node_;
};

/// Task-dependency runtime on a fixed pool of worker threads.
///
/// submit() never blocks on task execution. A task becomes runnable once
/// every earlier task with a conflicting access to one of its regions has
/// finished (write/write, write/read, read/write on the same id). Tasks
/// without conflicts run concurrently.
///
/// A worker thread that waits (wait, taskwait_all, parallel_for_blocks)
/// runs ready tasks while it waits, so nested submission cannot deadlock
/// the pool. The first exception thrown by a task is rethrown by the next
/// wait on the scheduler.
class Scheduler {
public:
    /// Accelerator launch-geometry hints for the mover offload. They have no
    /// meaning on a host pool and are not used.
    static constexpr int kThreadLimitHint = 256;
    static constexpr int kNumTeamsHint = 391;

    explicit Scheduler(int workers, bool tracing = false);
    ~Scheduler();

    Scheduler(const Scheduler&) = delete;
    Scheduler& operator=(const Scheduler&) = delete;

    int worker_count() const { return static_cast<int>(threads_.size()); }

    TaskHandle submit(TaskSpec task);

    /// Block until every task submitted to the listed queues has finished.
    void wait(std::span<const int> queues);
    void wait(std::initializer_list<int> queues) { wait(std::span<const int>(queues.begin(), queues.size())); }
    /// Wait for one task; rethrows the exception it raised, if any.
    void wait(const TaskHandle& handle);
    /// Wait for every handle, then rethrow the first failure among them.
    void wait(std::span<const TaskHandle> handles);

    /// Global barrier: returns once no task is pending anywhere, including
    /// tasks submitted from inside other tasks.
    void taskwait_all();

    /// Split [begin, end) into ceil(len / grainsize) contiguous blocks, run
    /// one task per block and return when all have finished.
    void parallel_for_blocks(std::size_t begin, std::size_t end, std::size_t grainsize,
                             const std::function<void(std::size_t, std::size_t)>& body, int queue = 0,
                             std::string_view tag = "block");

    /// Model of an unstructured enter/exit data lifecycle: a write task on
    /// each region, ordering later users after enter and exit after every
    /// earlier user. No data moves.
    TaskHandle data_region_enter(std::span<const RegionId> regions, int queue = 0);
    TaskHandle data_region_exit(std::span<const RegionId> regions, int queue = 0);

    /// Drain outstanding work and stop the workers. Later submits throw.
    void shutdown();

    void set_tracing(bool on);
    std::vector<TraceEvent> trace() const;
    void clear_trace();
    void write_trace_csv(const std::filesystem::path& path) const;

    /// Nanoseconds on the scheduler's trace clock.
    std::int64_t now_ns() const;

private:
    struct RegionState {
        std::shared_ptr<detail::TaskNode> last_writer;
        std::vector<std::shared_ptr<detail::TaskNode>> readers;
    };

    void worker_loop(int worker);
    bool run_one(std::unique_lock<std::mutex>& lock, int worker);
    void finish(const std::shared_ptr<detail::TaskNode>& node);
    template <class Pred>
    void wait_until(Pred done);
    void rethrow_pending_error();

    mutable std::mutex mutex_;
    std::condition_variable cv_;
    std::deque<std::shared_ptr<detail::TaskNode>> ready_;
    std::unordered_map<std::uint64_t, RegionState> regions_;
    std::unordered_map<int, std::size_t> outstanding_per_queue_;
    std::unordered_map<std::uint64_t, int> open_regions_;
    std::size_t outstanding_ = 0;
    std::uint64_t next_id_ = 1;
    bool stopping_ = false;
    std::exception_ptr error_;

    std::atomic<bool> tracing_;
    mutable std::mutex trace_mutex_;
    std::vector<TraceEvent> trace_;
    std::chrono::steady_clock::time_point epoch_;

    std::vector<std::thread> threads_;
};

/// Parse a trace CSV written by Scheduler::write_trace_csv.
std::vector<TraceEvent> read_trace_csv(const std::filesystem::path& path);

} // namespace cellpic
