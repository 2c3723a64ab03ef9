#pragma once

#include <cstddef>

namespace chtd::alloc {

// Counters for the large numeric buffers (block systems, factor sets, grid
// fields). They undercount: small temporaries are not tracked.

void record_alloc(std::size_t bytes) noexcept;
void record_free(std::size_t bytes) noexcept;
std::size_t current_bytes() noexcept;
std::size_t peak_bytes() noexcept;
/// Peak restarts from the current level.
void reset_peak() noexcept;

/// Counts bytes for the lifetime of the object.
class Scoped {
public:
    explicit Scoped(std::size_t bytes) noexcept : bytes_(bytes) { record_alloc(bytes_); }
    ~Scoped() { record_free(bytes_); }
    Scoped(const Scoped&) = delete;
    Scoped& operator=(const Scoped&) = delete;

private:
    std::size_t bytes_;
};

}  // namespace chtd::alloc
