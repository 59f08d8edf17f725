"""Top-down RST discourse parsing by iterative sequence segmentation."""
