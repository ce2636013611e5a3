#pragma once

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include "phenopat/corpus.hpp"
#include "phenopat/random.hpp"

namespace testing {

inline std::filesystem::path data_dir() { return PHENOPAT_DATA_DIR; }
inline std::filesystem::path golden_dir() { return PHENOPAT_GOLDEN_DIR; }

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    phenopat::Rng rng(std::hash<std::string>{}(tag) ^ reinterpret_cast<std::uintptr_t>(this));
    path_ = std::filesystem::temp_directory_path() /
            ("phenopat-" + tag + "-" + std::to_string(rng.next() % 1000000007));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline phenopat::Fragment fragment(std::string id, std::string text, std::string site,
                                   std::string phenotype, phenopat::LabelSet labels) {
  return {std::move(id), std::move(text), std::move(site), std::move(phenotype), labels};
}

// Runs the CLI with stdout/stderr redirected to files; returns the exit code.
inline int run_cli(const std::string& args, const std::filesystem::path& out_file,
                   const std::filesystem::path& err_file) {
  const std::string cmd = std::string("\"") + PHENOPAT_CLI + "\" " + args + " >\"" +
                          out_file.string() + "\" 2>\"" + err_file.string() + "\"";
  const int status = std::system(cmd.c_str());
  if (status == -1) return -1;
  return WEXITSTATUS(status);
}

}  // namespace testing
