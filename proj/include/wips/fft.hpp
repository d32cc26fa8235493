#pragma once

#include <fftw3.h>

#include <complex>
#include <cstring>
#include <mutex>
#include <unordered_map>
#include <vector>

namespace wips {
namespace detail {

/// Cached FFTW plans per transform size.  Plan creation is serialized (FFTW
/// requirement); execution uses the thread-safe new-array interface on
/// thread-local buffers.
class FftEngine {
public:
    static FftEngine& instance() {
        static FftEngine e;
        return e;
    }

    /// values (size n) -> half-complex spectrum (size n/2+1), normalized by 1/n.
    void forward(const std::vector<double>& in,
                 std::vector<std::complex<double>>& out) {
        const std::size_t n = in.size();
        Buffers& buf = local_buffers(n);
        const Plans& plans = plans_for(n);
        std::memcpy(buf.real, in.data(), n * sizeof(double));
        fftw_execute_dft_r2c(plans.r2c, buf.real, buf.cplx);
        out.resize(n / 2 + 1);
        const double scale = 1.0 / static_cast<double>(n);
        for (std::size_t k = 0; k <= n / 2; ++k)
            out[k] = std::complex<double>(buf.cplx[k][0] * scale,
                                          buf.cplx[k][1] * scale);
    }

    /// Half-complex spectrum (size n/2+1, already 1/n-normalized) -> values.
    void inverse(const std::vector<std::complex<double>>& in, std::size_t n,
                 std::vector<double>& out) {
        Buffers& buf = local_buffers(n);
        const Plans& plans = plans_for(n);
        for (std::size_t k = 0; k <= n / 2; ++k) {
            buf.cplx[k][0] = in[k].real();
            buf.cplx[k][1] = in[k].imag();
        }
        fftw_execute_dft_c2r(plans.c2r, buf.cplx, buf.real);
        out.resize(n);
        std::memcpy(out.data(), buf.real, n * sizeof(double));
    }

private:
    struct Plans {
        fftw_plan r2c = nullptr;
        fftw_plan c2r = nullptr;
    };
    struct Buffers {
        double* real = nullptr;
        fftw_complex* cplx = nullptr;
        std::size_t n = 0;
        ~Buffers() {
            if (real) fftw_free(real);
            if (cplx) fftw_free(cplx);
        }
    };

    const Plans& plans_for(std::size_t n) {
        std::lock_guard<std::mutex> lock(mutex_);
        auto it = plans_.find(n);
        if (it != plans_.end())
            return it->second;
        double* r = fftw_alloc_real(n);
        fftw_complex* c = fftw_alloc_complex(n / 2 + 1);
        Plans p;
        p.r2c = fftw_plan_dft_r2c_1d(static_cast<int>(n), r, c, FFTW_ESTIMATE);
        p.c2r = fftw_plan_dft_c2r_1d(static_cast<int>(n), c, r, FFTW_ESTIMATE);
        fftw_free(r);
        fftw_free(c);
        return plans_.emplace(n, p).first->second;
    }

    static Buffers& local_buffers(std::size_t n) {
        thread_local std::unordered_map<std::size_t, Buffers> bufs;
        Buffers& b = bufs[n];
        if (b.n != n) {
            if (b.real) fftw_free(b.real);
            if (b.cplx) fftw_free(b.cplx);
            b.real = fftw_alloc_real(n);
            b.cplx = fftw_alloc_complex(n / 2 + 1);
            b.n = n;
        }
        return b;
    }

    std::mutex mutex_;
    std::unordered_map<std::size_t, Plans> plans_;
};

}  // namespace detail
}  // namespace wips
