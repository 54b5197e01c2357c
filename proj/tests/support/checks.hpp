#pragma once

#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <utility>

#include "vcache/error.hpp"

namespace testsupport {

// Runs f, which must throw vcache::Error, and returns the kind for asserting.
template <typename F>
vcache::ErrorKind thrown_kind(F&& f) {
    try {
        std::forward<F>(f)();
    } catch (const vcache::Error& e) {
        return e.kind();
    }
    throw std::runtime_error("expected a vcache::Error, none was thrown");
}

// Fresh directory under the system temp root, removed on scope exit.
struct TempDir {
    std::filesystem::path path;

    explicit TempDir(const std::string& tag) {
        static std::atomic<int> counter{0};
        path = std::filesystem::temp_directory_path() /
               ("vcache-test-" + tag + "-" + std::to_string(::getpid()) + "-" +
                std::to_string(counter.fetch_add(1)));
        std::filesystem::remove_all(path);
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
};

}  // namespace testsupport
