#include "cli.hpp"

int main(int argc, char** argv) { return anomflow::cli::run(argc, argv); }
