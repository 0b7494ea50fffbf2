#pragma once

#include <fftw3.h>

#include <memory>
#include <mutex>
#include <new>

#include "phonon_forge/error.hpp"

namespace phonon_forge::detail {

// fftw planner calls are not thread safe; execution on distinct plans is.
inline std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

struct FftwFree {
    void operator()(void* p) const noexcept { fftw_free(p); }
};

template <typename T>
std::unique_ptr<T[], FftwFree> fftw_buffer(std::size_t count) {
    auto* p = static_cast<T*>(fftw_malloc(sizeof(T) * count));
    if (p == nullptr) throw std::bad_alloc();
    return std::unique_ptr<T[], FftwFree>(p);
}

class Plan {
public:
    explicit Plan(fftw_plan p) : p_(p) {
        if (p_ == nullptr) throw NumericalError("fftw plan creation failed");
    }
    ~Plan() {
        std::lock_guard<std::mutex> lock(planner_mutex());
        fftw_destroy_plan(p_);
    }
    Plan(const Plan&) = delete;
    Plan& operator=(const Plan&) = delete;
    void execute() const { fftw_execute(p_); }

private:
    fftw_plan p_;
};

}  // namespace phonon_forge::detail
