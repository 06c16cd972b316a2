#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace apsde
{

//! Worker count used by the compute kernels (defaults to the hardware count,
//! or APSDE_THREADS when set).
unsigned thread_count();
void set_thread_count(unsigned n);

/*!
 * Run body(begin, end) over contiguous chunks of [0, n).
 *
 * Chunk boundaries depend only on n and chunk, never on the number of
 * threads, so any per-chunk partial result is reproducible; callers combine
 * partials in chunk order.
 */
template<class F>
void parallel_chunks(std::size_t n, std::size_t chunk, F&& body)
{
    if (n == 0) return;
    if (chunk == 0) chunk = 1;
    std::size_t const n_chunks = (n + chunk - 1) / chunk;
    unsigned const workers = static_cast<unsigned>(
        std::min<std::size_t>(thread_count(), n_chunks));
    auto run_chunk = [&](std::size_t c) {
        std::size_t const begin = c * chunk;
        body(c, begin, std::min(n, begin + chunk));
    };
    if (workers <= 1)
    {
        for (std::size_t c = 0; c < n_chunks; ++c) run_chunk(c);
        return;
    }
    std::vector<std::thread> pool;
    std::exception_ptr error;
    std::mutex error_mutex;
    for (unsigned w = 0; w < workers; ++w)
    {
        pool.emplace_back([&, w] {
            try
            {
                for (std::size_t c = w; c < n_chunks; c += workers) run_chunk(c);
            }
            catch (...)
            {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace apsde
