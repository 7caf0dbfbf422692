#ifndef GQF_PARALLEL_HPP
#define GQF_PARALLEL_HPP

#include <algorithm>
#include <atomic>
#include <functional>
#include <thread>
#include <vector>

namespace gqf {

// Process-wide worker cap (CLI --threads). 0 = hardware concurrency.
inline std::atomic<int>& thread_cap_storage() {
    static std::atomic<int> v{0};
    return v;
}
inline void set_thread_cap(int n) { thread_cap_storage() = n; }
inline int thread_cap() {
    int v = thread_cap_storage();
    return v > 0 ? v : std::max(1u, std::thread::hardware_concurrency());
}

// Deterministic sharded reduction: the index range splits into a FIXED
// number of shards independent of the worker count, each shard reduces in
// index order, and shards merge in shard order. Results are identical for
// any thread count.
template <typename Acc,
          typename ShardFn,   // void(long shard, long begin, long end, Acc&)
          typename MergeFn>   // void(Acc& into, const Acc& from)
Acc sharded_reduce(long total, long shards, ShardFn shard_fn, MergeFn merge, Acc init) {
    if (total <= 0) return init;
    shards = std::max(1L, std::min(shards, total));
    std::vector<Acc> results(static_cast<size_t>(shards), init);
    int workers = std::min<long>(thread_cap(), shards);
    if (workers <= 1) {
        for (long s = 0; s < shards; s++) {
            long b = total * s / shards, e = total * (s + 1) / shards;
            shard_fn(s, b, e, results[size_t(s)]);
        }
    } else {
        std::vector<std::thread> pool;
        std::atomic<long> next{0};
        for (int w = 0; w < workers; w++)
            pool.emplace_back([&]() {
                long s;
                while ((s = next.fetch_add(1)) < shards) {
                    long b = total * s / shards, e = total * (s + 1) / shards;
                    shard_fn(s, b, e, results[size_t(s)]);
                }
            });
        for (auto& t : pool) t.join();
    }
    Acc acc = init;
    for (long s = 0; s < shards; s++) merge(acc, results[size_t(s)]);
    return acc;
}

}  // namespace gqf

#endif
