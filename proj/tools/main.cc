#include "cli.h"

int main(int argc, char** argv) { return ihoc::cli::Main(argc, argv); }
