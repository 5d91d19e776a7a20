#include "lovit/cli.hpp"

int main(int argc, char** argv) { return lovit::cli_main(argc, argv); }
