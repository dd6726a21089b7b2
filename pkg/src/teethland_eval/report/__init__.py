"""SVG figures of metric reports and rankings."""
