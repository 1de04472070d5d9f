#pragma once

#include <map>
#include <mutex>

#include "brwlab/green.hpp"

namespace brwlab::test {

// Full-size tables come from $BRWLAB_CACHE_DIR; built once per process.
inline const GreenTable& green(int dim) {
    static std::mutex mutex;
    static std::map<int, GreenTable> tables;
    std::lock_guard lock(mutex);
    auto it = tables.find(dim);
    if (it == tables.end()) it = tables.emplace(dim, GreenTable::load_or_build(dim)).first;
    return it->second;
}

inline Site site(std::initializer_list<std::int32_t> xs) {
    Site s{};
    int i = 0;
    for (auto x : xs) s[i++] = x;
    return s;
}

}  // namespace brwlab::test
