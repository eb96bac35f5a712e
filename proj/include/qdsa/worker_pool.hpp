// Copyright 2026 The qdsa Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <condition_variable>
#include <cstddef>
#include <deque>
#include <functional>
#include <mutex>
#include <optional>
#include <thread>
#include <utility>
#include <vector>

namespace qdsa {

/// Fixed-size pool of stateless workers. Results are delivered through a
/// completion queue in the order the tasks finish.
template <typename Result>
class WorkerPool {
public:
    using Task = std::function<Result()>;

    explicit WorkerPool(std::size_t workers) {
        if (workers == 0)
            workers = 1;
        threads_.reserve(workers);
        for (std::size_t i = 0; i < workers; ++i)
            threads_.emplace_back([this] { loop(); });
    }

    WorkerPool(const WorkerPool&) = delete;
    WorkerPool& operator=(const WorkerPool&) = delete;

    ~WorkerPool() {
        {
            std::lock_guard lock(mu_);
            stopping_ = true;
        }
        task_cv_.notify_all();
        for (auto& t : threads_)
            t.join();
    }

    void submit(std::size_t ticket, Task task) {
        {
            std::lock_guard lock(mu_);
            tasks_.emplace_back(ticket, std::move(task));
            ++pending_;
        }
        task_cv_.notify_one();
    }

    /// Blocks until some submitted task finishes; nullopt when nothing is pending.
    std::optional<std::pair<std::size_t, Result>> wait_any() {
        std::unique_lock lock(mu_);
        if (pending_ == 0)
            return std::nullopt;
        done_cv_.wait(lock, [this] { return !done_.empty(); });
        auto r = std::move(done_.front());
        done_.pop_front();
        --pending_;
        return r;
    }

    std::size_t pending() const {
        std::lock_guard lock(mu_);
        return pending_;
    }

private:
    void loop() {
        for (;;) {
            std::pair<std::size_t, Task> job;
            {
                std::unique_lock lock(mu_);
                task_cv_.wait(lock, [this] { return stopping_ || !tasks_.empty(); });
                if (tasks_.empty())
                    return;
                job = std::move(tasks_.front());
                tasks_.pop_front();
            }
            Result r = job.second();
            {
                std::lock_guard lock(mu_);
                done_.emplace_back(job.first, std::move(r));
            }
            done_cv_.notify_one();
        }
    }

    mutable std::mutex mu_;
    std::condition_variable task_cv_;
    std::condition_variable done_cv_;
    std::deque<std::pair<std::size_t, Task>> tasks_;
    std::deque<std::pair<std::size_t, Result>> done_;
    std::size_t pending_{0};
    bool stopping_{false};
    std::vector<std::thread> threads_;
};

}  // namespace qdsa
