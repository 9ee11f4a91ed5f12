#include "commands.hpp"

int main(int argc, char** argv) { return lrlasso::cli::run(argc, argv); }
