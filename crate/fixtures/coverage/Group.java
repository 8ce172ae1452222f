import java.util.Vector;

public class Group implements Shape {
    private Vector<Shape> children;

    public void draw() { }

    public void resize(int factor) { }
}
