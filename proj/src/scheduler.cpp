#include "cellpic/scheduler.hpp"

#include "cellpic/csv.hpp"
#include "cellpic/error.hpp"

#include <algorithm>
#include <string>

namespace cellpic {

namespace detail {

struct TaskNode {
    std::uint64_t id = 0;
    TaskSpec spec;
    int pending = 0;
    std::atomic<bool> completed{false};
    std::vector<std::shared_ptr<TaskNode>> successors;
    std::exception_ptr error;
};

} // namespace detail

namespace {

thread_local const Scheduler* tl_scheduler = nullptr;
thread_local int tl_worker = -1;

} // namespace

RegionId RegionId::named(std::string_view name) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : name) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return {h};
}

bool TaskHandle::done() const {
    return node_ != nullptr && node_->completed.load(std::memory_order_acquire);
}

std::uint64_t TaskHandle::id() const { return node_ ? node_->id : 0; }

Scheduler::Scheduler(int workers, bool tracing) : tracing_(tracing), epoch_(std::chrono::steady_clock::now()) {
    if (workers < 1) throw SchedulerError("scheduler needs at least one worker");
    threads_.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        threads_.emplace_back([this, w] { worker_loop(w); });
    }
}

Scheduler::~Scheduler() {
    try {
        shutdown();
    } catch (...) {
        // Destructors must not throw; pending task errors are dropped.
    }
}

std::int64_t Scheduler::now_ns() const {
    return std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() - epoch_).count();
}

TaskHandle Scheduler::submit(TaskSpec task) {
    if (task.queue < 0) throw SchedulerError("queue ids must be non-negative");
    for (std::size_t a = 0; a < task.regions.size(); ++a) {
        for (std::size_t b = a + 1; b < task.regions.size(); ++b) {
            if (task.regions[a].id == task.regions[b].id) {
                throw SchedulerError("task '" + task.tag + "' lists a region twice");
            }
        }
    }
    auto node = std::make_shared<detail::TaskNode>();
    node->spec = std::move(task);

    std::unique_lock lock(mutex_);
    if (stopping_) throw SchedulerError("submit after shutdown");
    node->id = next_id_++;

    std::vector<detail::TaskNode*> preds;
    auto depend_on = [&](const std::shared_ptr<detail::TaskNode>& pred) {
        if (!pred || pred->completed) return;
        if (std::find(preds.begin(), preds.end(), pred.get()) != preds.end()) return;
        preds.push_back(pred.get());
        pred->successors.push_back(node);
        ++node->pending;
    };

    for (const DataRegion& r : node->spec.regions) {
        RegionState& state = regions_[r.id.value];
        depend_on(state.last_writer);
        if (r.mode == AccessMode::read) {
            if (state.readers.size() >= 64) {
                std::erase_if(state.readers, [](const auto& t) { return t->completed.load(); });
            }
            state.readers.push_back(node);
        } else {
            for (const auto& reader : state.readers) depend_on(reader);
            state.readers.clear();
            state.last_writer = node;
        }
    }

    ++outstanding_;
    ++outstanding_per_queue_[node->spec.queue];
    if (node->pending == 0) ready_.push_back(node);
    lock.unlock();
    cv_.notify_all();
    return TaskHandle(node);
}

bool Scheduler::run_one(std::unique_lock<std::mutex>& lock, int worker) {
    if (ready_.empty()) return false;
    std::shared_ptr<detail::TaskNode> node = std::move(ready_.front());
    ready_.pop_front();
    lock.unlock();

    const std::int64_t start = now_ns();
    try {
        if (node->spec.work) node->spec.work();
    } catch (...) {
        node->error = std::current_exception();
    }
    const std::int64_t end = now_ns();
    if (tracing_.load(std::memory_order_relaxed)) {
        std::lock_guard trace_lock(trace_mutex_);
        trace_.push_back({node->id, node->spec.tag, node->spec.queue, worker, start, end});
    }

    lock.lock();
    finish(node);
    return true;
}

void Scheduler::finish(const std::shared_ptr<detail::TaskNode>& node) {
    node->completed.store(true, std::memory_order_release);
    if (node->error && !error_) error_ = node->error;
    for (const auto& succ : node->successors) {
        if (--succ->pending == 0) ready_.push_back(succ);
    }
    node->successors.clear();
    node->spec.work = nullptr;
    --outstanding_;
    --outstanding_per_queue_[node->spec.queue];
    cv_.notify_all();
}

void Scheduler::worker_loop(int worker) {
    tl_scheduler = this;
    tl_worker = worker;
    std::unique_lock lock(mutex_);
    for (;;) {
        cv_.wait(lock, [&] { return !ready_.empty() || (stopping_ && outstanding_ == 0); });
        if (ready_.empty()) break;
        run_one(lock, worker);
    }
}

template <class Pred>
void Scheduler::wait_until(Pred done) {
    std::unique_lock lock(mutex_);
    if (tl_scheduler == this) {
        while (!done()) {
            if (!run_one(lock, tl_worker)) cv_.wait(lock);
        }
    } else {
        cv_.wait(lock, done);
    }
}

void Scheduler::rethrow_pending_error() {
    std::exception_ptr e;
    {
        std::lock_guard lock(mutex_);
        std::swap(e, error_);
    }
    if (e) std::rethrow_exception(e);
}

void Scheduler::wait(std::span<const int> queues) {
    wait_until([&] {
        for (int q : queues) {
            auto it = outstanding_per_queue_.find(q);
            if (it != outstanding_per_queue_.end() && it->second != 0) return false;
        }
        return true;
    });
    rethrow_pending_error();
}

void Scheduler::wait(const TaskHandle& handle) {
    wait(std::span<const TaskHandle>(&handle, 1));
}

void Scheduler::wait(std::span<const TaskHandle> handles) {
    wait_until([&] {
        for (const TaskHandle& h : handles) {
            if (h.node_ && !h.node_->completed) return false;
        }
        return true;
    });
    std::exception_ptr first;
    {
        std::lock_guard lock(mutex_);
        for (const TaskHandle& h : handles) {
            if (h.node_ && h.node_->error) {
                if (!first) first = h.node_->error;
                if (error_ == h.node_->error) error_ = nullptr;
            }
        }
    }
    if (first) std::rethrow_exception(first);
}

void Scheduler::taskwait_all() {
    wait_until([&] { return outstanding_ == 0; });
    rethrow_pending_error();
}

void Scheduler::parallel_for_blocks(std::size_t begin, std::size_t end, std::size_t grainsize,
                                    const std::function<void(std::size_t, std::size_t)>& body, int queue,
                                    std::string_view tag) {
    if (grainsize == 0) throw SchedulerError("grainsize must be >= 1");
    if (begin >= end) return;
    std::vector<TaskHandle> handles;
    handles.reserve((end - begin + grainsize - 1) / grainsize);
    for (std::size_t b = begin; b < end; b += std::min(grainsize, end - b)) {
        const std::size_t e = std::min(end, b + grainsize);
        handles.push_back(submit({[&body, b, e] { body(b, e); }, {}, queue, std::string(tag)}));
    }
    wait(std::span<const TaskHandle>(handles));
}

TaskHandle Scheduler::data_region_enter(std::span<const RegionId> regions, int queue) {
    TaskSpec spec{nullptr, {}, queue, "enter"};
    {
        std::lock_guard lock(mutex_);
        for (RegionId r : regions) ++open_regions_[r.value];
    }
    for (RegionId r : regions) spec.regions.push_back(DataRegion::out(r));
    return submit(std::move(spec));
}

TaskHandle Scheduler::data_region_exit(std::span<const RegionId> regions, int queue) {
    TaskSpec spec{nullptr, {}, queue, "exit"};
    {
        std::lock_guard lock(mutex_);
        for (RegionId r : regions) {
            auto it = open_regions_.find(r.value);
            if (it == open_regions_.end() || it->second == 0) {
                throw SchedulerError("data_region_exit without a matching enter");
            }
        }
        for (RegionId r : regions) --open_regions_[r.value];
    }
    for (RegionId r : regions) spec.regions.push_back(DataRegion::inout(r));
    return submit(std::move(spec));
}

void Scheduler::shutdown() {
    {
        std::unique_lock lock(mutex_);
        if (stopping_ && threads_.empty()) return;
        if (tl_scheduler == this) throw SchedulerError("shutdown called from a worker thread");
        cv_.wait(lock, [&] { return outstanding_ == 0; });
        stopping_ = true;
    }
    cv_.notify_all();
    for (auto& t : threads_) {
        if (t.joinable()) t.join();
    }
    threads_.clear();
    rethrow_pending_error();
}

void Scheduler::set_tracing(bool on) { tracing_.store(on); }

std::vector<TraceEvent> Scheduler::trace() const {
    std::lock_guard lock(trace_mutex_);
    return trace_;
}

void Scheduler::clear_trace() {
    std::lock_guard lock(trace_mutex_);
    trace_.clear();
}

void Scheduler::write_trace_csv(const std::filesystem::path& path) const {
    CsvWriter out(path, {"tag", "queue", "worker", "start_ns", "end_ns"});
    for (const TraceEvent& e : trace()) {
        std::string tag = e.tag;
        std::replace(tag.begin(), tag.end(), ',', ';');
        out.cell(tag).cell(e.queue).cell(e.worker).cell(e.start_ns).cell(e.end_ns);
        out.end_row();
    }
}

std::vector<TraceEvent> read_trace_csv(const std::filesystem::path& path) {
    const auto rows = read_csv(path);
    if (rows.empty() || rows[0] != std::vector<std::string>{"tag", "queue", "worker", "start_ns", "end_ns"}) {
        throw Error("trace file " + path.string() + " has an unexpected header");
    }
    std::vector<TraceEvent> events;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& f = rows[r];
        if (f.size() != 5) throw Error("trace file " + path.string() + ": malformed row " + std::to_string(r));
        TraceEvent e;
        e.tag = f[0];
        e.queue = std::stoi(f[1]);
        e.worker = std::stoi(f[2]);
        e.start_ns = std::stoll(f[3]);
        e.end_ns = std::stoll(f[4]);
        events.push_back(std::move(e));
    }
    return events;
}

} // namespace cellpic
