#include "alloc_tracker.hpp"

#include <atomic>
#include <cerrno>
#include <cstdint>
#include <cstring>

#include <malloc.h>

extern "C" {
void* __libc_malloc(std::size_t);
void* __libc_calloc(std::size_t, std::size_t);
void* __libc_realloc(void*, std::size_t);
void* __libc_memalign(std::size_t, std::size_t);
void __libc_free(void*);
}

namespace {

std::atomic<std::size_t> g_current{0};
std::atomic<std::size_t> g_peak{0};
std::atomic<std::size_t> g_cap{0};
std::atomic<bool> g_active{false};

bool admit(std::size_t n) {
    const std::size_t c = g_cap.load(std::memory_order_relaxed);
    return c == 0 || g_current.load(std::memory_order_relaxed) + n <= c;
}

void note_alloc(void* p) {
    if (!p) return;
    g_active.store(true, std::memory_order_relaxed);
    const std::size_t n = malloc_usable_size(p);
    const std::size_t now = g_current.fetch_add(n, std::memory_order_relaxed) + n;
    std::size_t prev = g_peak.load(std::memory_order_relaxed);
    while (now > prev && !g_peak.compare_exchange_weak(prev, now, std::memory_order_relaxed)) {
    }
}

void note_free(void* p) {
    if (p) g_current.fetch_sub(malloc_usable_size(p), std::memory_order_relaxed);
}

}  // namespace

extern "C" {

void* malloc(std::size_t n) {
    if (!admit(n)) {
        errno = ENOMEM;
        return nullptr;
    }
    void* p = __libc_malloc(n);
    note_alloc(p);
    return p;
}

void* calloc(std::size_t k, std::size_t n) {
    if (n && k > SIZE_MAX / n) {
        errno = ENOMEM;
        return nullptr;
    }
    if (!admit(k * n)) {
        errno = ENOMEM;
        return nullptr;
    }
    void* p = __libc_calloc(k, n);
    note_alloc(p);
    return p;
}

void* realloc(void* old, std::size_t n) {
    if (!old) return malloc(n);
    if (n == 0) {
        free(old);
        return nullptr;
    }
    const std::size_t before = malloc_usable_size(old);
    if (n > before && !admit(n - before)) {
        errno = ENOMEM;
        return nullptr;
    }
    void* p = __libc_realloc(old, n);
    if (p) {
        g_current.fetch_sub(before, std::memory_order_relaxed);
        note_alloc(p);
    }
    return p;
}

void free(void* p) {
    note_free(p);
    __libc_free(p);
}

void* memalign(std::size_t align, std::size_t n) {
    if (!admit(n)) {
        errno = ENOMEM;
        return nullptr;
    }
    void* p = __libc_memalign(align, n);
    note_alloc(p);
    return p;
}

void* aligned_alloc(std::size_t align, std::size_t n) { return memalign(align, n); }

int posix_memalign(void** out, std::size_t align, std::size_t n) {
    void* p = memalign(align, n);
    if (!p) return ENOMEM;
    *out = p;
    return 0;
}

}  // extern "C"

namespace sqpc::alloc {

bool active() { return g_active.load(); }
std::size_t current() { return g_current.load(); }
std::size_t peak() { return g_peak.load(); }
void reset_peak() { g_peak.store(g_current.load()); }
void set_cap(std::size_t bytes) { g_cap.store(bytes); }
std::size_t cap() { return g_cap.load(); }

}  // namespace sqpc::alloc
