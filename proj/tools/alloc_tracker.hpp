#pragma once

#include <cstddef>

// Process-wide heap accounting through malloc interposition (glibc).
namespace sqpc::alloc {

bool active();
std::size_t current();
std::size_t peak();
void reset_peak();

// Allocations that would push the live total above the cap fail; 0 disables the cap.
void set_cap(std::size_t bytes);
std::size_t cap();

}  // namespace sqpc::alloc
