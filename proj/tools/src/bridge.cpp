#include <spawn.h>
#include <sys/wait.h>

#include <cerrno>
#include <cstring>

#include "commands.hpp"
#include "sciembed/error.hpp"

extern char** environ;

namespace sciembed::cli {

int run_process(const std::string& executable, const std::vector<std::string>& args) {
  std::vector<std::string> storage;
  storage.reserve(args.size() + 1);
  storage.push_back(executable);
  storage.insert(storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : storage) argv.push_back(s.data());
  argv.push_back(nullptr);

  pid_t pid = 0;
  const int rc = posix_spawnp(&pid, executable.c_str(), nullptr, nullptr, argv.data(), environ);
  if (rc != 0) throw IoError("cannot start " + executable + ": " + std::strerror(rc));
  int status = 0;
  while (waitpid(pid, &status, 0) < 0) {
    if (errno != EINTR) throw IoError("waitpid failed for " + executable);
  }
  if (WIFEXITED(status)) return WEXITSTATUS(status);
  return 128 + (WIFSIGNALED(status) ? WTERMSIG(status) : 0);
}

}  // namespace sciembed::cli
