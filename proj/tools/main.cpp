#include "hashtriage/cli.hpp"

int main(int argc, char** argv) { return hashtriage::cli::run(argc, argv); }
