#include "bstable/parallel.hpp"

namespace bstable {

namespace {
std::atomic<unsigned> g_threads{0};
}

void set_worker_threads(unsigned threads) { g_threads.store(threads); }

unsigned worker_threads() {
  const unsigned requested = g_threads.load();
  if (requested != 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

}  // namespace bstable
