#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <string>

#include <unistd.h>

#include "veloplan/model.hpp"
#include "veloplan/scenarios.hpp"

namespace veloplan::test
{

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir
{
public:
    TempDir()
    {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("veloplan-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir()
    {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir &) = delete;
    TempDir &operator=(const TempDir &) = delete;

    const std::filesystem::path &path() const { return path_; }
    std::string file(const std::string &name) const { return (path_ / name).string(); }

    std::string write(const std::string &name, const std::string &content) const
    {
        std::ofstream(path_ / name) << content;
        return file(name);
    }

private:
    std::filesystem::path path_;
};

inline std::string read_file(const std::string &path)
{
    std::ifstream in(path);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Fiat 500 on a flat path with uniform speed limit.
inline ProblemInstance flat_instance(std::size_t n, double h, double w_init, double w_max = 1975.0,
                                     double lambda = 0.0)
{
    ProblemInstance instance;
    instance.vehicle = fiat500().params;
    instance.path.step = h;
    instance.path.slope_sin.assign(n - 1, 0.0);
    instance.path.w_max.assign(n, w_max);
    instance.lambda = lambda;
    instance.w_init = w_init;
    return instance;
}

} // namespace veloplan::test
