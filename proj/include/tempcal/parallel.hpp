#pragma once

#include <exception>
#include <mutex>

namespace tempcal {

/// Captures the first exception thrown inside an OpenMP region so it can be rethrown
/// on the calling thread once the region has joined.
class ParallelErrors {
public:
    template <class F>
    void run(F&& f) noexcept {
        try {
            f();
        } catch (...) {
            std::lock_guard<std::mutex> lock(mutex_);
            if (!first_) first_ = std::current_exception();
        }
    }

    void rethrow() const {
        if (first_) std::rethrow_exception(first_);
    }

private:
    std::mutex mutex_;
    std::exception_ptr first_;
};

}  // namespace tempcal
