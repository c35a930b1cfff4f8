#pragma once

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <string_view>
#include <thread>

#include "affordance/error.hpp"

namespace affordance {

inline std::string read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Write to a sibling temp file, fsync, then rename over `path`. Readers see
/// either the old or the new content, never a torn file.
inline void write_file_atomic(const std::string& path, std::string_view bytes) {
  const std::string tmp = path + ".tmp";
  const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
  if (fd < 0) throw Error(ErrorKind::io, "cannot write " + tmp + ": " + std::strerror(errno));
  std::size_t done = 0;
  while (done < bytes.size()) {
    const auto n = ::write(fd, bytes.data() + done, bytes.size() - done);
    if (n < 0) {
      if (errno == EINTR) continue;
      ::close(fd);
      throw Error(ErrorKind::io, "write failed on " + tmp + ": " + std::strerror(errno));
    }
    done += static_cast<std::size_t>(n);
  }
  if (::fsync(fd) != 0 || ::close(fd) != 0) throw Error(ErrorKind::io, "cannot flush " + tmp);
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorKind::io, "cannot replace " + path + ": " + ec.message());
}

/// Exclusive single-writer lock: `<path>.lock` created with O_EXCL and
/// removed on destruction.
class FileLock {
 public:
  explicit FileLock(std::string path, std::chrono::milliseconds timeout = std::chrono::milliseconds(5000))
      : lock_path_(std::move(path) + ".lock") {
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    for (;;) {
      fd_ = ::open(lock_path_.c_str(), O_WRONLY | O_CREAT | O_EXCL, 0644);
      if (fd_ >= 0) return;
      if (errno != EEXIST) throw Error(ErrorKind::io, "cannot create " + lock_path_ + ": " + std::strerror(errno));
      if (std::chrono::steady_clock::now() > deadline) {
        throw Error(ErrorKind::conflict, lock_path_ + " is held by another writer");
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
  }
  FileLock(const FileLock&) = delete;
  FileLock& operator=(const FileLock&) = delete;
  ~FileLock() {
    ::close(fd_);
    ::unlink(lock_path_.c_str());
  }

 private:
  std::string lock_path_;
  int fd_ = -1;
};

}  // namespace affordance
