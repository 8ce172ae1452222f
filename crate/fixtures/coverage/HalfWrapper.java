public class HalfWrapper implements Shape {
    private Shape inner;

    public void draw() {
        inner.draw();
    }

    public void resize(int factor) { }
}
