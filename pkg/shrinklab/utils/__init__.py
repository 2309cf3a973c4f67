from .utils import (
    read_obj,
    write_obj,
    read_curve_csv,
    write_curve_csv,
    write_csv,
    csv_lines,
)
