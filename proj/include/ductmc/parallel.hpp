/*
   Copyright 2026 The ductmc Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/

#pragma once

#include <algorithm>
#include <cstdint>
#include <exception>
#include <thread>
#include <vector>

namespace ductmc {

/**
 * @brief Splits [0, n) into `threads` contiguous chunks and runs
 *        fn(chunk, begin, end) on each, one std::thread per chunk.
 *
 * Chunk boundaries are a pure function of (n, threads). The first exception
 * thrown by any chunk is rethrown after all threads join.
 */
template <typename Fn>
void parallel_chunks(std::uint64_t n, unsigned threads, Fn&& fn) {
    threads = std::max(1u, threads);
    if (n < threads) {
        threads = static_cast<unsigned>(std::max<std::uint64_t>(n, 1));
    }
    if (threads == 1) {
        fn(0u, std::uint64_t{0}, n);
        return;
    }
    std::vector<std::exception_ptr> errors(threads);
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned c = 0; c < threads; ++c) {
        const std::uint64_t begin = n * c / threads;
        const std::uint64_t end = n * (c + 1) / threads;
        pool.emplace_back([&, c, begin, end] {
            try {
                fn(c, begin, end);
            } catch (...) {
                errors[c] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) {
        t.join();
    }
    for (auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
}

}  // namespace ductmc
