"""Standalone SVG plots with CSV sidecars"""
import logging
import math
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from lxml import etree as ET
import pandas as pd

from ..utils.errors import MissingColumn


logger = logging.getLogger(__name__)

PLOT_KINDS = ('scatter2d', 'id_ood_bars', 'dynamics')
REQUIRED_COLUMNS = {
    'scatter2d': ['gt_x', 'gt_y', 'pred_x', 'pred_y'],
    'id_ood_bars': ['label', 'rmse_id', 'rmse_ood'],
    'dynamics': ['step', 'val_metric'],
}
GT_COLOR = '#d62728'
PRED_COLOR = '#1f77b4'
SERIES_COLORS = ['#1f77b4', '#d62728', '#2ca02c', '#9467bd', '#ff7f0e', '#8c564b']


def _fmt(value: float) -> str:
    return f"{value:.2f}"


def require_columns(frame: pd.DataFrame, kind: str) -> None:
    """
    Raises:
        MissingColumn: If the frame lacks a column the plot kind needs
    """
    missing = [c for c in REQUIRED_COLUMNS[kind] if c not in frame.columns]
    if missing:
        raise MissingColumn(f"Plot '{kind}' needs column(s): {', '.join(missing)}")


class SvgPlotter:
    """Draw scatter, bar and training-curve plots as SVG documents"""

    NAMESPACE = 'http://www.w3.org/2000/svg'

    def __init__(self, config: Optional[Dict[str, Any]] = None):
        """
        Args:
            config: The 'plot' configuration section (width, height, margin)
        """
        config = config or {}
        self.width = int(config.get('width', 480))
        self.height = int(config.get('height', 480))
        self.margin = int(config.get('margin', 48))

    def _elem(self, parent: ET._Element, name: str, text: Optional[str] = None, **attrs: Any) -> ET._Element:
        """
        Create an SVG element; attribute names use '_' for '-'

        Args:
            parent: Parent element
            name: Element name (without namespace)
            text: Optional text content
        """
        elem = ET.SubElement(parent, f"{{{self.NAMESPACE}}}{name}")
        for key, value in attrs.items():
            elem.set(key.replace('_', '-'), value if isinstance(value, str) else _fmt(value))
        if text is not None:
            elem.text = str(text)
        return elem

    def _document(self, title: str) -> ET._Element:
        root = ET.Element(f"{{{self.NAMESPACE}}}svg", nsmap={None: self.NAMESPACE})
        root.set('width', str(self.width))
        root.set('height', str(self.height))
        root.set('viewBox', f"0 0 {self.width} {self.height}")
        self._elem(root, 'rect', x='0', y='0', width=str(self.width), height=str(self.height), fill='white')
        self._elem(root, 'text', title, x=self.width / 2.0, y=self.margin / 2.0,
                   text_anchor='middle', font_family='sans-serif', font_size='14')
        return root

    @property
    def _plot_box(self) -> tuple[float, float, float, float]:
        m = float(self.margin)
        return m, m, self.width - 2 * m, self.height - 2 * m

    def _sx(self, value: float, lo: float, hi: float) -> float:
        left, _, w, _ = self._plot_box
        return left + (value - lo) / (hi - lo) * w

    def _sy(self, value: float, lo: float, hi: float) -> float:
        _, top, _, h = self._plot_box
        return top + h - (value - lo) / (hi - lo) * h

    def _axes(self, root: ET._Element, x_range: tuple[float, float], y_range: tuple[float, float],
              x_label: str, y_label: str, ticks: int = 5) -> None:
        left, top, w, h = self._plot_box
        axes = self._elem(root, 'g', id='axes', stroke='black', stroke_width='1', fill='none')
        self._elem(axes, 'rect', x=left, y=top, width=w, height=h)
        labels = self._elem(root, 'g', id='ticks', font_family='sans-serif', font_size='10', fill='black')
        for i in range(ticks + 1):
            xv = x_range[0] + (x_range[1] - x_range[0]) * i / ticks
            yv = y_range[0] + (y_range[1] - y_range[0]) * i / ticks
            x, y = self._sx(xv, *x_range), self._sy(yv, *y_range)
            self._elem(axes, 'line', x1=x, y1=top + h, x2=x, y2=top + h + 4)
            self._elem(axes, 'line', x1=left - 4, y1=y, x2=left, y2=y)
            self._elem(labels, 'text', f"{xv:.3g}", x=x, y=top + h + 16, text_anchor='middle')
            self._elem(labels, 'text', f"{yv:.3g}", x=left - 6, y=y + 3, text_anchor='end')
        self._elem(labels, 'text', x_label, x=left + w / 2.0, y=self.height - 8.0, text_anchor='middle')
        self._elem(labels, 'text', y_label, x=12.0, y=top + h / 2.0, text_anchor='middle',
                   transform=f"rotate(-90 12 {_fmt(top + h / 2.0)})")

    def scatter2d(self, frame: pd.DataFrame) -> ET._Element:
        """Ground truth in red and predictions in blue on the unit square"""
        require_columns(frame, 'scatter2d')
        root = self._document('Ground truth (red) and predictions (blue)')
        self._axes(root, (0.0, 1.0), (0.0, 1.0), 'x', 'y')
        for name, x_col, y_col, color in (('gt', 'gt_x', 'gt_y', GT_COLOR),
                                          ('pred', 'pred_x', 'pred_y', PRED_COLOR)):
            group = self._elem(root, 'g', id=name, fill=color, fill_opacity='0.6')
            for x, y in zip(frame[x_col], frame[y_col]):
                if pd.isna(x) or pd.isna(y):
                    continue
                self._elem(group, 'circle', cx=self._sx(float(x), 0.0, 1.0),
                           cy=self._sy(float(y), 0.0, 1.0), r='2.5')
        return root

    def id_ood_bars(self, frame: pd.DataFrame) -> ET._Element:
        """Paired ID / OOD RMSE bars, one pair per labelled run"""
        require_columns(frame, 'id_ood_bars')
        values = [v for v in pd.concat([frame['rmse_id'], frame['rmse_ood']]) if pd.notna(v)]
        top_value = max(values) * 1.1 if values and max(values) > 0 else 1.0
        root = self._document('Position RMSE, ID vs OOD')
        self._axes(root, (0.0, float(max(len(frame), 1))), (0.0, top_value), 'run', 'RMSE', ticks=max(len(frame), 1))

        bars = self._elem(root, 'g', id='bars')
        n = max(len(frame), 1)
        slot = self._plot_box[2] / n
        for i, (label, rmse_id, rmse_ood) in enumerate(zip(frame['label'], frame['rmse_id'], frame['rmse_ood'])):
            for offset, value, color in ((0.15, rmse_id, PRED_COLOR), (0.5, rmse_ood, GT_COLOR)):
                if pd.isna(value):
                    continue
                x = self._plot_box[0] + slot * (i + offset)
                y = self._sy(float(value), 0.0, top_value)
                self._elem(bars, 'rect', x=x, y=y, width=slot * 0.35,
                           height=self._sy(0.0, 0.0, top_value) - y, fill=color)
            self._elem(bars, 'text', str(label), x=self._plot_box[0] + slot * (i + 0.5),
                       y=self.margin + self._plot_box[3] + 30.0, text_anchor='middle',
                       font_family='sans-serif', font_size='10')
        return root

    def dynamics(self, frame: pd.DataFrame) -> ET._Element:
        """Validation metric against training step, one polyline per label"""
        require_columns(frame, 'dynamics')
        points = frame.dropna(subset=['val_metric'])
        labels: List[str] = sorted(points['label'].unique()) if 'label' in points.columns else ['run']
        steps = points['step'].astype(float)
        x_range = (0.0, float(steps.max())) if len(points) and steps.max() > 0 else (0.0, 1.0)
        y_max = float(points['val_metric'].max()) if len(points) else 0.0
        y_range = (0.0, y_max * 1.1 if y_max > 0 else 1.0)

        root = self._document('Validation MSE during training')
        self._axes(root, x_range, y_range, 'step', 'validation MSE')
        for i, label in enumerate(labels):
            series = points[points['label'] == label] if 'label' in points.columns else points
            coords = ' '.join(
                f"{_fmt(self._sx(float(s), *x_range))},{_fmt(self._sy(float(v), *y_range))}"
                for s, v in zip(series['step'], series['val_metric'])
                if math.isfinite(float(v))
            )
            color = SERIES_COLORS[i % len(SERIES_COLORS)]
            self._elem(root, 'polyline', points=coords, fill='none', stroke=color, stroke_width='1.5')
            self._elem(root, 'text', str(label), x=self._plot_box[0] + 8.0, y=self.margin + 14.0 * (i + 1),
                       fill=color, font_family='sans-serif', font_size='11')
        return root

    def write(self, root: ET._Element, output_path: Path) -> Path:
        output_path = Path(output_path)
        output_path.parent.mkdir(parents=True, exist_ok=True)
        tree = ET.ElementTree(root)
        with output_path.open('wb') as output_file:
            tree.write(output_file, encoding='UTF-8', xml_declaration=True, pretty_print=True)
        return output_path


def render_plot(kind: str, frame: pd.DataFrame, output_path: Path,
                config: Optional[Dict[str, Any]] = None) -> tuple[Path, Path]:
    """
    Draw one plot to output_path and write the plotted columns next to it as CSV

    Args:
        kind: One of scatter2d, id_ood_bars, dynamics
        frame: Input rows
        output_path: Target .svg path
        config: The 'plot' configuration section

    Returns:
        Paths of the SVG and its CSV sidecar

    Raises:
        MissingColumn: If the input lacks a required column
    """
    if kind not in PLOT_KINDS:
        raise ValueError(f"Unknown plot kind '{kind}'. Choose from: {', '.join(PLOT_KINDS)}")
    plotter = SvgPlotter(config)
    root = getattr(plotter, kind)(frame)
    svg_path = plotter.write(root, output_path)

    columns: Sequence[str] = REQUIRED_COLUMNS[kind]
    if kind == 'dynamics' and 'label' in frame.columns:
        columns = ['label'] + list(columns)
    sidecar = Path(output_path).with_suffix('.csv')
    frame[list(columns)].to_csv(sidecar, index=False, float_format='%.8g', lineterminator='\n')
    logger.info(f"Plot '{kind}' written: {svg_path} ({len(frame)} rows)")
    return svg_path, sidecar
