#include "ebmlab/cli.hpp"

int main(int argc, char** argv) { return ebmlab::cli::run(argc, argv); }
