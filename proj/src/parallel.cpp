#include "apsde/parallel.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

namespace apsde
{
namespace
{
unsigned default_threads()
{
    if (char const* env = std::getenv("APSDE_THREADS"))
    {
        try
        {
            int const n = std::stoi(env);
            if (n > 0) return static_cast<unsigned>(n);
        }
        catch (std::exception const&)
        {
        }
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

std::atomic<unsigned>& threads()
{
    static std::atomic<unsigned> n{default_threads()};
    return n;
}
}  // namespace

unsigned thread_count()
{
    return threads().load();
}

void set_thread_count(unsigned n)
{
    threads().store(n == 0 ? default_threads() : n);
}

}  // namespace apsde
