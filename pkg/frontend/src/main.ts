import { HttpRoutesApi } from './api.js';
import { RoutePlanner } from './app.js';
import { SvgMapView, renderLegend } from './render.js';

function mustFind<T extends HTMLElement>(id: string): T {
  const element = document.getElementById(id);
  if (!element) {
    throw new Error(`missing element #${id}`);
  }
  return element as T;
}

export function bootstrap(): RoutePlanner {
  const view = new SvgMapView(
    mustFind('map'),
    mustFind('panel'),
    mustFind('banner'),
    mustFind('notice'),
  );
  renderLegend(mustFind('legend'));

  const slider = mustFind<HTMLInputElement>('alpha-slider');
  const sliderValue = mustFind('alpha-value');
  const planner = new RoutePlanner(new HttpRoutesApi(''), view, Number(slider.value));
  sliderValue.textContent = slider.value;

  view.svg.addEventListener('click', (event) => {
    const [lat, lon] = view.latLonFromClient(event.clientX, event.clientY);
    planner.mapClick(lat, lon);
  });
  slider.addEventListener('input', () => {
    sliderValue.textContent = slider.value;
    planner.setAlpha(Number(slider.value));
  });
  mustFind<HTMLInputElement>('toggle-network').addEventListener('change', (event) => {
    view.setNetworkVisible((event.target as HTMLInputElement).checked);
  });
  mustFind('retry').addEventListener('click', () => {
    void planner.loadNetwork();
  });

  void planner.loadNetwork();
  return planner;
}

if (typeof document !== 'undefined' && document.getElementById('map')) {
  bootstrap();
}
