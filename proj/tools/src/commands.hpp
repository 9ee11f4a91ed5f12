#pragma once

namespace lrlasso::cli {

// Exit codes: 0 success, 1 domain or runtime failure, 2 usage error.
int run(int argc, char** argv);

}  // namespace lrlasso::cli
