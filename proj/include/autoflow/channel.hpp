/*
    Licensed under the Apache License, Version 2.0 (the "License");
    you may not use this file except in compliance with the License.
    You may obtain a copy of the License at

        https://www.apache.org/licenses/LICENSE-2.0

    Unless required by applicable law or agreed to in writing, software
    distributed under the License is distributed on an "AS IS" BASIS,
    WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
    See the License for the specific language governing permissions and
    limitations under the License.
*/

#pragma once

#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <limits>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>

namespace autoflow {

class ChannelClosed : public std::runtime_error {
public:
    ChannelClosed() : std::runtime_error("channel closed") {}
};

/// Wake-up signal shared by every input channel of one operator, so a single
/// consumer loop can sleep until any of its inputs has something.
class Notifier {
public:
    void notify() {
        {
            std::lock_guard lock(mutex_);
            ++generation_;
        }
        cv_.notify_one();
    }

    std::uint64_t generation() const {
        std::lock_guard lock(mutex_);
        return generation_;
    }

    /// Blocks until generation moves past `seen` or the deadline passes.
    template <typename Clock, typename Duration>
    void wait_until(std::uint64_t seen, std::chrono::time_point<Clock, Duration> deadline) {
        std::unique_lock lock(mutex_);
        cv_.wait_until(lock, deadline, [&] { return generation_ != seen; });
    }

    void wait(std::uint64_t seen) {
        std::unique_lock lock(mutex_);
        cv_.wait(lock, [&] { return generation_ != seen; });
    }

private:
    mutable std::mutex mutex_;
    std::condition_variable cv_;
    std::uint64_t generation_ = 0;
};

/// FIFO channel with one producer side and one consumer side. push() blocks
/// while the buffer holds `capacity` messages.
template <typename T>
class Channel {
public:
    static constexpr std::size_t kUnbounded = std::numeric_limits<std::size_t>::max();

    explicit Channel(std::size_t capacity, std::shared_ptr<Notifier> consumer = nullptr)
        : capacity_(capacity), consumer_(std::move(consumer)) {
        if (capacity_ == 0) {
            throw std::invalid_argument("channel capacity must be positive");
        }
    }

    Channel(const Channel&) = delete;
    Channel& operator=(const Channel&) = delete;

    /// Throws ChannelClosed if the channel is closed before space frees up.
    void push(T value) {
        {
            std::unique_lock lock(mutex_);
            not_full_.wait(lock, [&] { return closed_ || buffer_.size() < capacity_; });
            if (closed_) {
                throw ChannelClosed();
            }
            buffer_.push_back(std::move(value));
        }
        if (consumer_) {
            consumer_->notify();
        }
    }

    std::optional<T> try_pop() {
        std::optional<T> out;
        {
            std::lock_guard lock(mutex_);
            if (buffer_.empty()) {
                return std::nullopt;
            }
            out.emplace(std::move(buffer_.front()));
            buffer_.pop_front();
        }
        not_full_.notify_one();
        return out;
    }

    /// Wakes blocked producers; they observe ChannelClosed.
    void close() {
        {
            std::lock_guard lock(mutex_);
            closed_ = true;
        }
        not_full_.notify_all();
        if (consumer_) {
            consumer_->notify();
        }
    }

    std::size_t size() const {
        std::lock_guard lock(mutex_);
        return buffer_.size();
    }

    std::size_t capacity() const noexcept { return capacity_; }

private:
    const std::size_t capacity_;
    std::shared_ptr<Notifier> consumer_;
    mutable std::mutex mutex_;
    std::condition_variable not_full_;
    std::deque<T> buffer_;
    bool closed_ = false;
};

}  // namespace autoflow
